"""配置模块.""" 