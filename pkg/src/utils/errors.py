"""异常定义."""


class CertificationError(ValueError):
    """认证不足：区间包络过宽、误差预算超限或认证位数不够.

    与普通的参数错误（ValueError）区分开，命令行以独立的退出码报告。
    """

    def __init__(self, message: str, certified: int = 0):
        super().__init__(message)
        self.certified = certified
