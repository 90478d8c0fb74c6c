def main():
    i = 0
    while i >= 0:
        i = i + 1
    return i
