def canTraverseAllPairs(nums):
    global parent
    n = len(nums)
    if n == 1:
        return True
    parent = []
    i = 0
    while i < n:
        parent = parent + [i]
        i = i + 1
    i = 0
    while i < n:
        if nums[i] == 1:
            return False
        j = i + 1
        while j < n:
            g = gcd(nums[i], nums[j])
            if g > 1:
                update(i, j)
            j = j + 1
        i = i + 1
    i = 1
    while i < n:
        ri = find(i)
        r0 = find(0)
        if ri != r0:
            return False
        i = i + 1
    return True

def update(i, j):
    global parent
    ri = find(i)
    rj = find(j)
    if ri != rj:
        parent[ri] = rj

def find(x):
    global parent
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x
