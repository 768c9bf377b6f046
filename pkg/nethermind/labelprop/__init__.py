"""Transductive propagation networks for few-shot classification"""
