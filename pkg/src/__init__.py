"""SAN-lite - style-aggregated facial landmark detection at desk scale"""

__version__ = "0.1.0"
