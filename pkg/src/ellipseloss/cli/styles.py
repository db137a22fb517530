"""Rich styles and theme for the ellipseloss CLI."""

from rich.style import Style
from rich.theme import Theme


# Custom styles
SUCCESS_STYLE = Style(color="green", bold=True)
ERROR_STYLE = Style(color="red", bold=True)
WARNING_STYLE = Style(color="yellow", bold=True)
INFO_STYLE = Style(color="blue", bold=True)

# Report styles
REPORT_VALUE_STYLE = Style(color="cyan")
REPORT_HEADER_STYLE = Style(color="white", bold=True)
OFFROAD_STYLE = Style(color="magenta")

BORDER_STYLE = "blue"

# Custom theme
ELLIPSELOSS_THEME = Theme(
    {
        "success": SUCCESS_STYLE,
        "error": ERROR_STYLE,
        "warning": WARNING_STYLE,
        "info": INFO_STYLE,
        "report.value": REPORT_VALUE_STYLE,
        "report.header": REPORT_HEADER_STYLE,
        "report.offroad": OFFROAD_STYLE,
    }
)
