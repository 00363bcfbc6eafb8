"""
Image storage unit of the processing cloud

Robots upload image content here; only its digest goes on the ledger.
"""

from typing import Dict

from app.oracle.schemas import ImageSample
from app.shared.exceptions import DuplicateSubmissionError, NotFoundError


class ImageStorage:
    """
    Digest -> scene token store.

    Single Responsibility: Off-ledger image content storage
    """

    def __init__(self):
        self._tokens: Dict[bytes, bytes] = {}

    def put(self, digest: bytes, token: bytes) -> None:
        existing = self._tokens.get(digest)
        if existing is not None and existing != token:
            raise DuplicateSubmissionError(
                f"digest {digest.hex()[:12]} is already stored with other content"
            )
        self._tokens[digest] = token

    def get(self, digest: bytes) -> bytes:
        try:
            return self._tokens[digest]
        except KeyError:
            raise NotFoundError(f"no image stored for digest {digest.hex()[:12]}") from None

    def sample(self, digest: bytes) -> ImageSample:
        return ImageSample(digest=digest, token=self.get(digest))

    def __contains__(self, digest: bytes) -> bool:
        return digest in self._tokens

    def __len__(self) -> int:
        return len(self._tokens)
