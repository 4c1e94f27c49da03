"""服务模块.""" 