"""
Services package: device mathematics, netlist front end, MNA engine and experiments
"""
