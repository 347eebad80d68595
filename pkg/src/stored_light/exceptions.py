"""
stored_light 커스텀 예외 클래스
"""

from typing import Optional


class StoredLightError(Exception):
    """패키지 기본 예외 클래스"""

    def __init__(self, message: str, details: Optional[dict] = None):
        """
        Args:
            message: 에러 메시지
            details: 원인 파악용 부가 정보 (있는 경우)
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self):
        if self.details:
            extra = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
            return f"{self.message} ({extra})"
        return self.message


class InvalidParameterError(StoredLightError):
    """물리 파라미터가 허용 범위를 벗어난 경우 (kappa <= 0, |s| > 1 등)"""
    pass


class OutOfRangeError(StoredLightError):
    """스케줄 구간 밖의 시각을 조회한 경우"""
    pass


class InvalidTraceError(StoredLightError):
    """각도 트레이스의 시간 샘플이 단조 증가하지 않는 경우"""
    pass


class ConfigurationError(StoredLightError):
    """격자/CFL 등 수치 설정 오류"""
    pass


class NumericFaultError(StoredLightError):
    """NaN/Inf 가 상태 배열에 섞여 들어온 경우"""
    pass


class GridMismatchError(StoredLightError):
    """배열 길이 혹은 격자가 서로 맞지 않는 경우"""
    pass


class ApplicabilityError(StoredLightError):
    """해석해(형태 보존 수송)를 적용할 수 없는 구간"""
    pass


class BasisMismatchError(StoredLightError):
    """서로 다른 theta 를 가진 폴라리톤 기저 사이의 변환 요청"""
    pass


class UnnormalizedPacketError(StoredLightError):
    """파동묶음 노름이 1 이 아닌 경우"""
    pass


class UnknownStageError(StoredLightError):
    """RunResult 에 없는 스테이지 라벨"""
    pass


class ScenarioError(StoredLightError):
    """시나리오 문서 관련 예외의 기본 클래스"""
    pass


class ScenarioSyntaxError(ScenarioError):
    """JSON 문법 오류 (줄/열 정보 포함)"""

    def __init__(self, message: str, line: int = None, column: int = None):
        super().__init__(message, {"line": line, "column": column})
        self.line = line
        self.column = column


class UnknownKeyError(ScenarioError):
    """허용되지 않은 키 (가장 가까운 유효 키 제안 포함)"""

    def __init__(self, key: str, suggestion: Optional[str] = None, section: str = ""):
        where = f"{section}.{key}" if section else key
        message = f"알 수 없는 키 '{where}'"
        if suggestion:
            message += f" (혹시 '{suggestion}' 인가요?)"
        super().__init__(message)
        self.key = key
        self.suggestion = suggestion


class MissingKeyError(ScenarioError):
    """필수 키 누락"""

    def __init__(self, key: str):
        super().__init__(f"필수 키 '{key}' 가 없습니다")
        self.key = key


class ScenarioValidationError(ScenarioError):
    """문법은 맞지만 물리적으로 성립하지 않는 시나리오"""
    pass
