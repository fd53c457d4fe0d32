import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


class ChunkExecutor:
    """Maps a function over fixed-size row chunks of an array.

    Chunk boundaries do not depend on the thread count and no reduction
    crosses a chunk, so results are identical at every parallelism degree.
    """

    def __init__(self, app=None, threads=1, chunk_size=256):
        self.threads = threads
        self.chunk_size = chunk_size
        if app is not None:
            self.init_app(app)

    def init_app(self, app):
        threads = app.config.get('SPECBOUND_THREADS') or int(os.environ.get('SPECBOUND_THREADS') or 1)
        self.configure(threads, app.config.get('CHUNK_SIZE', self.chunk_size))

    def configure(self, threads=None, chunk_size=None):
        if threads is not None:
            self.threads = max(1, int(threads))
        if chunk_size is not None:
            self.chunk_size = max(1, int(chunk_size))
        logger.debug(f"Chunk executor: {self.threads} thread(s), chunk size {self.chunk_size}")

    def map_rows(self, func, rows: np.ndarray) -> np.ndarray:
        """Apply func to row blocks of rows and concatenate along axis 0"""
        total = rows.shape[0]
        if total == 0:
            return func(rows)
        bounds = [(start, min(start + self.chunk_size, total)) for start in range(0, total, self.chunk_size)]
        if self.threads == 1 or len(bounds) == 1:
            parts = [func(rows[a:b]) for a, b in bounds]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda ab: func(rows[ab[0]:ab[1]]), bounds))
        return np.concatenate(parts, axis=0)


executor = ChunkExecutor()
