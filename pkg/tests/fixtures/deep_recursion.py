import sys
sys.setrecursionlimit(80)

def spin(n):
    return spin(n + 1)

spin(0)
