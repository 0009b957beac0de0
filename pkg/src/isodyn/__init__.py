"""Effective translation-mode field theory of inner-space isometries."""
