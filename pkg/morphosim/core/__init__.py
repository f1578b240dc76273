"""Fixed-step integration and time series"""
