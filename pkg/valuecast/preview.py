""" methods for generating text previews of report tables on the command line """

from .settings import config


def _format(value):
    if isinstance(value, float):
        return "%.6g" % value
    return str(value)


def preview(frame, limit=None, width=None):
    """
    Render a pandas DataFrame as a fixed-width text table.

    :param frame: the table to render
    :param limit: maximum number of rows shown, default config["display.limit"]
    :param width: maximum column width, default config["display.width"]
    """
    if limit is None:
        limit = config["display.limit"]
    if width is None:
        width = config["display.width"]
    has_more = len(frame) > limit
    rows = frame.head(limit)
    columns = [str(c) for c in frame.columns]
    cells = {
        name: [_format(v) for v in rows[column]]
        for name, column in zip(columns, frame.columns)
    }
    widths = {
        f: min(max([len(f)] + [len(e) for e in cells[f]]) + 4, width) for f in columns
    }
    templates = {f: "%%-%d.%ds" % (widths[f], widths[f]) for f in columns}
    return (
        " ".join([templates[f] % f for f in columns])
        + "\n"
        + " ".join(["+" + "-" * (widths[column] - 2) + "+" for column in columns])
        + "\n"
        + "\n".join(
            " ".join(templates[f] % cells[f][i] for f in columns)
            for i in range(len(rows))
        )
        + ("\n   ...\n" if has_more else "\n")
        + " (Total: %d)\n" % len(frame)
    )
