"""File formats, dataset plumbing, and the command-line surface.

Submodules are imported directly (``vidsteg.cli_io.video_io`` etc.); this
package init stays empty to keep import cycles out of the core modules.
"""
