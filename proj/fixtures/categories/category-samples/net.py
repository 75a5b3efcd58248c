import socket
import urllib.request

import requests

requests.get("https://api.example.com/v1/status")
requests.post("https://api.example.com/v1/upload", data={"kind": "report"})
urllib.request.urlopen("https://mirror.example.com/file.bin")
socket.connect(("203.0.113.5", 4444))
