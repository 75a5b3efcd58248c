import pathlib
import urllib.request

patch = urllib.request.urlopen("https://mirror.example.com/patch-notes.txt").read().decode()
pathlib.Path("/tmp/patch-notes/cache.txt").write_text(patch)
