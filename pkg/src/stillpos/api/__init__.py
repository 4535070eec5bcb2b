from stillpos.api.config import AppConfig, load_config, parse_config
from stillpos.api.http import ApiServer, PosApi

__all__ = ["AppConfig", "load_config", "parse_config", "PosApi", "ApiServer"]
