"""Script language and command-line front end"""
