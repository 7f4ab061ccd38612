"""Command package for the Elliptrack CLI."""
