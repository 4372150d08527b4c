"""Shared persistence plumbing: Zstandard codec bindings and an LRU cache.

The stores compress text-heavy columns with Zstandard at level 3. No Python
zstd package is assumed; the codec binds straight to the system libzstd.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import threading
from collections import OrderedDict
from typing import Generic, Hashable, Optional, TypeVar

ZSTD_LEVEL = 3
ZSTD_MAGIC = b"\x28\xb5\x2f\xfd"

_CONTENTSIZE_UNKNOWN = 2**64 - 1
_CONTENTSIZE_ERROR = 2**64 - 2


class CodecError(RuntimeError):
    """Raised when compression or decompression fails."""


def _load_libzstd() -> ctypes.CDLL:
    path = ctypes.util.find_library("zstd")
    if path is None:
        raise CodecError("libzstd shared library not found")
    lib = ctypes.CDLL(path)
    lib.ZSTD_compressBound.restype = ctypes.c_size_t
    lib.ZSTD_compressBound.argtypes = [ctypes.c_size_t]
    lib.ZSTD_compress.restype = ctypes.c_size_t
    lib.ZSTD_compress.argtypes = [
        ctypes.c_void_p,
        ctypes.c_size_t,
        ctypes.c_char_p,
        ctypes.c_size_t,
        ctypes.c_int,
    ]
    lib.ZSTD_decompress.restype = ctypes.c_size_t
    lib.ZSTD_decompress.argtypes = [
        ctypes.c_void_p,
        ctypes.c_size_t,
        ctypes.c_char_p,
        ctypes.c_size_t,
    ]
    lib.ZSTD_getFrameContentSize.restype = ctypes.c_ulonglong
    lib.ZSTD_getFrameContentSize.argtypes = [ctypes.c_char_p, ctypes.c_size_t]
    lib.ZSTD_isError.restype = ctypes.c_uint
    lib.ZSTD_isError.argtypes = [ctypes.c_size_t]
    lib.ZSTD_getErrorName.restype = ctypes.c_char_p
    lib.ZSTD_getErrorName.argtypes = [ctypes.c_size_t]
    return lib


_lib = _load_libzstd()
_lib_lock = threading.Lock()


def _check(code: int) -> int:
    if _lib.ZSTD_isError(code):
        raise CodecError(_lib.ZSTD_getErrorName(code).decode("ascii"))
    return code


def zstd_compress(data: bytes, level: int = ZSTD_LEVEL) -> bytes:
    """Compress bytes into a single Zstandard frame."""
    bound = _lib.ZSTD_compressBound(len(data))
    dst = ctypes.create_string_buffer(bound)
    with _lib_lock:
        written = _check(_lib.ZSTD_compress(dst, bound, data, len(data), level))
    return dst.raw[:written]


def zstd_decompress(data: bytes) -> bytes:
    """Decompress a single Zstandard frame produced by zstd_compress."""
    if not data.startswith(ZSTD_MAGIC):
        raise CodecError("payload is not a Zstandard frame")
    size = _lib.ZSTD_getFrameContentSize(data, len(data))
    if size in (_CONTENTSIZE_UNKNOWN, _CONTENTSIZE_ERROR):
        raise CodecError("Zstandard frame does not declare its content size")
    dst = ctypes.create_string_buffer(size) if size else ctypes.create_string_buffer(1)
    with _lib_lock:
        written = _check(_lib.ZSTD_decompress(dst, size, data, len(data)))
    return dst.raw[:written]


def compress_text(text: str) -> bytes:
    return zstd_compress(text.encode("utf-8"))


def decompress_text(blob: bytes) -> str:
    return zstd_decompress(bytes(blob)).decode("utf-8")


K = TypeVar("K", bound=Hashable)
V = TypeVar("V")


class LRUCache(Generic[K, V]):
    """Bounded LRU cache with hit/miss counters. Capacity 0 disables caching."""

    def __init__(self, capacity: int = 256):
        if capacity < 0:
            raise ValueError("cache capacity must be >= 0")
        self.capacity = capacity
        self._entries: "OrderedDict[K, V]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: K) -> Optional[V]:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                self.hits += 1
                return self._entries[key]
            self.misses += 1
            return None

    def put(self, key: K, value: V) -> None:
        if self.capacity == 0:
            return
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def invalidate(self, key: K) -> None:
        with self._lock:
            self._entries.pop(key, None)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
