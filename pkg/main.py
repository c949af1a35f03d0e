"""
loggas - 主入口文件
"""
import sys
from pathlib import Path

from dotenv import load_dotenv

# 加载环境变量（必须在导入 config 之前）
load_dotenv()

# 添加项目根目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

from app.cli import main as cli_main


def main() -> None:
    """主函数"""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
