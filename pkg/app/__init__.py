# loggas 命令行与产物输出
