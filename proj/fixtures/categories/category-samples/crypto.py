import base64
import hashlib

from Crypto.Cipher import AES
from Crypto.PublicKey import RSA

digest = hashlib.sha256(b"payload").hexdigest()
mac = hashlib.md5(b"payload").hexdigest()
cipher = AES.new(b"0123456789abcdef", 9)
rsa = RSA.import_key("-----BEGIN KEY-----")
token = base64.b64encode(b"blob")
