"""应用模块.""" 