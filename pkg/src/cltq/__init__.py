"""Cross-lingual text quantification with SCL/DCI projections and CC/PCC/ACC/PACC."""

__version__ = "0.1.0"
