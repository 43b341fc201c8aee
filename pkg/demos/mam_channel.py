"""
An encrypted message channel
============================

Each message lands at an address derived from the channel key and its
index.  Only key holders can find it or read it, and any edit to the
stored ciphertext is caught by the authentication tag.
"""

import dataclasses

from tanglesim import MamChannel, PowConfig, TangleGraph, WalkConfig, fetch, publish
from tanglesim.mam import AuthFailure, NotFound, message_address

graph = TangleGraph()
channel = MamChannel.generate()
walk_cfg = WalkConfig(rng_seed=3)

for text in (b"speed=42", b"speed=44", b"x" * 1500):
    hashes = publish(graph, channel, text, walk_cfg, PowConfig(6))
    print(f"published {len(text):5d} bytes in {len(hashes)} transaction(s)")

print("reader gets:", fetch(graph, channel.channel_key, 1))

try:
    fetch(graph, bytes(32), 0)
except NotFound:
    print("wrong key: nothing at that address")

# Flip one tryte of the stored ciphertext.
(tx,) = graph.by_address(message_address(channel.channel_key, 0))
bad = "A" if tx.payload[10] != "A" else "B"
graph.transactions[tx.hash] = dataclasses.replace(tx, payload=tx.payload[:10] + bad + tx.payload[11:])
try:
    fetch(graph, channel.channel_key, 0)
except AuthFailure:
    print("tampered message rejected")
