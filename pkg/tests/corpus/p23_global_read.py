# args: [[2]]
def scaled(x):
    return x * factor

def main(x):
    global factor
    factor = 7
    a = scaled(x)
    b = scaled(x + 1)
    return a + b
