import os

import dotenv

key = os.getenv("API_TOKEN")
region = os.environ["AWS_REGION"]
dotenv.load(".env")
