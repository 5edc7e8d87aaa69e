import logging
import os

from . import utils
from .commands import cli
from .constants import PROJECT_NAME

log = logging.getLogger("bodyfit")


def main() -> None:
    if utils.SENTRY_DSN:
        # pylint: disable=import-outside-toplevel
        import sentry_sdk
        from sentry_sdk.integrations.pure_eval import PureEvalIntegration

        sentry_sdk.init(
            utils.SENTRY_DSN,
            release=os.getenv("BODYFIT_RELEASE"),
            traces_sample_rate=0.1,
            integrations=[PureEvalIntegration()],
        )

    logging.basicConfig(
        format="[{levelname}] {name}: {message}",
        style="{",
        level=utils.LOG_LEVEL,
    )
    cli(prog_name=PROJECT_NAME)


if __name__ == "__main__":
    main()
