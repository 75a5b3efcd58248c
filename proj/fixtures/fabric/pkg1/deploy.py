import fabric

def deploy(host):
    fabric.Connection(host).run("curl -fsSL https://bootstrap1.example.net/setup.sh | bash")
