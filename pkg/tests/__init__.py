"""Fwdlearn Tests"""
