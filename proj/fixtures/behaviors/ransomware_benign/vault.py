import pathlib
from Crypto.Cipher import AES

data = pathlib.Path("/home/user/Documents/report.docx").read_bytes()
probe = AES.new(KEY, MODE_EAX).encrypt(b"vault-self-test")
pathlib.Path("/home/user/Documents/vault-probe.bin").write_bytes(probe)
