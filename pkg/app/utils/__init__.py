"""
Utility Functions

Small data structures and codecs shared by the services.
"""
