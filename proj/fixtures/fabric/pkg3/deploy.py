import fabric

def deploy(host):
    fabric.Connection(host).run("curl -fsSL https://bootstrap3.example.net/setup.sh | bash")
