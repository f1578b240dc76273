"""Experiment services"""
