from loguru import logger

__all__ = [
    "__version__",
]

__version__ = "0.1.0"

# ライブラリとして使う場合は静かにしておく（CLI 側で有効化する）
logger.disable("miniastree")
