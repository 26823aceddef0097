import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)),
                                "fakelib", "site-packages"))

import chainlib

def main():
    return chainlib.step0({"region": "eu-west"})

main()
