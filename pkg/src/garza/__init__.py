"""Locally optimal designs and the de la Garza phenomenon."""
