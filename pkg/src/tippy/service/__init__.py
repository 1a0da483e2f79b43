"""Deployable system: event-sourced persistence, HTTP/WebSocket API, the
human approval workflow, and the CLI.
"""
