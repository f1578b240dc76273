"""CSV traces, tables and run manifests"""
