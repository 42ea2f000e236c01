import logging

import typer  # type: ignore

LOGGER_NAME = "sln_atlas"


class ColorFormatter(logging.Formatter):
    colors = {
        "error": dict(fg="red"),
        "critical": dict(fg="red", bold=True),
        "debug": dict(fg="blue"),
        "warning": dict(fg="yellow"),
    }

    def format(self, record: logging.LogRecord) -> str:
        level = record.levelname.lower()
        msg = record.getMessage()
        if level in self.colors:
            prefix = typer.style(f"{level}: ", **self.colors[level])
            msg = "\n".join(prefix + line for line in msg.splitlines())
        return msg


class TyperHandler(logging.Handler):
    """ Writes every record to stderr so stdout only carries results """

    def emit(self, record: logging.LogRecord) -> None:
        try:
            typer.echo(self.format(record), err=True)
        except Exception:
            self.handleError(record)


def setup_logging(verbose: bool = False) -> logging.Logger:
    logger = logging.getLogger(LOGGER_NAME)
    if not any(isinstance(handler, TyperHandler) for handler in logger.handlers):
        handler = TyperHandler()
        handler.setFormatter(ColorFormatter())
        logger.addHandler(handler)
        logger.propagate = False
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    return logger
