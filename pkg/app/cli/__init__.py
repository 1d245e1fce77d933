"""Command-line surface: run, analyze, compare, sweep, demo"""
