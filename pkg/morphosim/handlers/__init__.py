"""Command handlers"""
