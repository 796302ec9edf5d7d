"""Fwdlearn utilities"""
