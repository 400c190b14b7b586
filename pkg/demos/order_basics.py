"""
Hiding bits in the order of packets
===================================

A sender controls a few peers that all receive data from it.  The order in
which the peers receive their packets is the message.  With n peers there
are n! orders, and we use the first 2**k of them, k = floor(log2 n!).
"""

from stegtorrent import capacity_bits, rank, unrank, bits_to_permutation, permutation_to_bits

for n in range(2, 7):
    print(f"n={n}: {capacity_bits(n)} bits per package")

# Orders are numbered lexicographically.  For four peers, the bit string
# "1011" is order number 11:
p = bits_to_permutation("1011", 4)
print(p, rank(p), permutation_to_bits(p))

# Orders 16..23 exist but carry nothing; a receiver that sees one knows the
# stream was damaged.
print(unrank(4, 23))

# %%
# Reading a stream
# ----------------
#
# The receiver sees every packet its peers got, sorted by the uTP
# timestamp the sender wrote.  Runs of an even length are noise; runs of
# odd length are symbols; anything for other peers (X) is skipped.

from stegtorrent import DataPackage, extract_symbols

stream = "1 4 4 X X 4 4 3 X 3 3 5 2 2 5 5 2 2 2 4 4 4 X 5".split()
found = extract_symbols(stream, DataPackage(("1", "2", "3", "4", "5")))
print("packages:", found.packages)     # symbol indices, 0-based
print("still open:", found.tail)
print("even runs dropped:", found.even_runs)
