# criterion number -> one-line verdict, printed in the pytest terminal summary
LINES: dict[int, str] = {}
