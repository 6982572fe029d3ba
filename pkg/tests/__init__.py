"""Test package for ionlink."""
