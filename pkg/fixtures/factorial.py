def factorial(n):
    if n == 0:
        return 1
    r = factorial(n - 1)
    return n * r
