"""
Routing on the road graph
"""
