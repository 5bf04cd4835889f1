import os
import sys
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Add src to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.cli.commands import main as cli_main
from src.utils.logging_config import setup_logging


def main() -> int:
    setup_logging()
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
