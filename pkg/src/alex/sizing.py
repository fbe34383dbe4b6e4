"""Byte accounting shared by the index, the fanout tree and the harness."""

KEY_BYTES = 8
POINTER_BYTES = 8
# model (2 doubles), 4 operation counters, expected stats (3 doubles),
# capacity + key count, append-detection state (4 words), parent and two
# sibling pointers, three slot-array pointers
DATA_NODE_META_BYTES = 16 + 32 + 24 + 16 + 32 + 24 + 24
# routing frame (scale, offset, shift), slot count, parent and children pointers
INTERNAL_META_BYTES = 24 + 8 + 16


def bitmap_bytes(capacity: int) -> int:
    return ((capacity + 63) // 64) * 8


def slot_bytes(capacity: int, payload_bytes: int) -> int:
    return capacity * (KEY_BYTES + payload_bytes)


def data_node_bytes(capacity: int, payload_bytes: int) -> int:
    """Size counted against ``max_node_bytes``: key and payload slots plus bitmap."""
    return slot_bytes(capacity, payload_bytes) + bitmap_bytes(capacity)


def internal_node_bytes(num_slots: int) -> int:
    return INTERNAL_META_BYTES + POINTER_BYTES * num_slots


def max_internal_slots(max_node_bytes: int) -> int:
    slots = max(2, max_node_bytes // POINTER_BYTES)
    return 1 << (slots.bit_length() - 1)


def max_data_capacity(max_node_bytes: int, payload_bytes: int) -> int:
    cap = max_node_bytes // (KEY_BYTES + payload_bytes)
    while cap > 0 and data_node_bytes(cap, payload_bytes) > max_node_bytes:
        cap -= 1
    return cap
