"""edaffect 主入口"""

import sys

from edaffect.cli import dispatch


def main():
    """主入口函数"""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
