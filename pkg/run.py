import sys

from dotenv import load_dotenv

load_dotenv()

from discountlearn import instrumentation  # noqa: E402
from discountlearn.harness import cli  # noqa: E402
from discountlearn.logging import init as init_logging  # noqa: E402

instrumentation.init()
init_logging()


if __name__ == "__main__":
    sys.exit(cli.main())
