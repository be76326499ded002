"""Console summaries for eightport-homodyne runs."""

import sys
from typing import Any, Dict, List, Optional, Sequence

from colorama import Fore, Style
from colorama import init as colorama_init


class ConsoleColors:
    """Colour name to colorama sequence mapping."""

    RESET = Style.RESET_ALL

    COLOR_MAP = {
        "red": Fore.RED,
        "green": Fore.GREEN,
        "yellow": Fore.YELLOW,
        "blue": Fore.BLUE,
        "magenta": Fore.MAGENTA,
        "cyan": Fore.CYAN,
        "white": Fore.WHITE,
        "red_bold": Style.BRIGHT + Fore.RED,
        "green_bold": Style.BRIGHT + Fore.GREEN,
        "yellow_bold": Style.BRIGHT + Fore.YELLOW,
        "cyan_bold": Style.BRIGHT + Fore.CYAN,
        "white_bold": Style.BRIGHT + Fore.WHITE,
    }

    @staticmethod
    def get_color_code(color_name: str) -> str:
        """
        Get the colour sequence for a name.

        Args:
            color_name: Colour name (e.g., "red", "green_bold")

        Returns:
            Escape sequence, or empty string if the name is unknown
        """
        return ConsoleColors.COLOR_MAP.get(color_name.lower(), "")

    @staticmethod
    def apply_color(text: str, color_name: str) -> str:
        color_code = ConsoleColors.get_color_code(color_name)
        if color_code:
            return f"{color_code}{text}{ConsoleColors.RESET}"
        return text


class SummaryFormatter:
    """
    Formats check results and tables of one command run for the console.

    Colour is only emitted when enabled; by default that means stdout is a terminal.
    """

    def __init__(self, use_color: Optional[bool] = None):
        if use_color is None:
            use_color = sys.stdout.isatty()
        self.use_color = use_color
        if use_color:
            colorama_init()

    def _color(self, text: str, color_name: str) -> str:
        return ConsoleColors.apply_color(text, color_name) if self.use_color else text

    def format_header(self, title: str) -> str:
        line = "=" * max(40, len(title) + 4)
        return "\n".join([line, self._color(title, "cyan_bold"), line])

    def format_check(self, name: str, passed: bool, detail: str = "") -> str:
        """
        Format one PASS/FAIL line.

        Args:
            name: Check name
            passed: Outcome
            detail: Optional measured value or explanation

        Returns:
            e.g. "[PASS] completeness: defect 1.1e-16"
        """
        status = self._color("PASS", "green_bold") if passed else self._color("FAIL", "red_bold")
        return f"[{status}] {name}" + (f": {detail}" if detail else "")

    def format_table(self, columns: Sequence[str], rows: Sequence[Sequence[Any]], limit: int = 10) -> str:
        """Fixed-width table of the first `limit` rows."""
        shown = [[self._cell(v) for v in row] for row in rows[:limit]]
        widths = [max([len(c)] + [len(row[i]) for row in shown]) for i, c in enumerate(columns)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
        lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in shown)
        if len(rows) > limit:
            lines.append(self._color(f"... {len(rows) - limit} more rows", "yellow"))
        return "\n".join(lines)

    @staticmethod
    def _cell(value: Any) -> str:
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    def format_report(self, report: Dict[str, Any], indent: int = 2) -> str:
        """
        Indented key: value listing of a report; nested sections are indented further.

        Args:
            report: Report mapping as written to JSON
            indent: Spaces before the top-level keys

        Returns:
            One line per scalar entry
        """
        lines = []
        pad = " " * indent
        for key, value in report.items():
            if isinstance(value, dict):
                lines.append(f"{pad}{self._color(str(key), 'white_bold')}:")
                lines.append(self.format_report(value, indent + 2))
            elif isinstance(value, (list, tuple)):
                lines.append(f"{pad}{key}: [{', '.join(self._cell(v) for v in value)}]")
            else:
                lines.append(f"{pad}{key}: {self._cell(value)}")
        return "\n".join(line for line in lines if line)

    def format_outputs(self, paths: List[str]) -> str:
        return "\n".join(f"  wrote {self._color(path, 'blue')}" for path in paths)
