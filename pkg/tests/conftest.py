def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines.extend(v for k, v in getattr(rep, "user_properties", []) if k == "acceptance")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line):
    cid = line.split("[", 1)[1].split("]", 1)[0]
    digits = "".join(ch for ch in cid if ch.isdigit())
    return int(digits), cid
