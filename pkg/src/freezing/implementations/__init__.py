"""Freezing policy implementations, one directory per policy kind"""
