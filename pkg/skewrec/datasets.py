"""Skewrec Datasets Module

Downloads public implicit-feedback corpora into a local cache.
"""
import io
import logging
import os
import zipfile

import requests

from skewrec.artifacts import atomic_open

logger = logging.getLogger(__name__)

MOVIELENS_100K_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
MOVIELENS_100K_MEMBER = "ml-100k/u.data"
MOVIELENS_100K_FILE = "ml-100k.data"


def fetch_movielens_100k(cache_dir: str, url: str = MOVIELENS_100K_URL, timeout: float = 60) -> str:
    """Fetch MovieLens-100K Ratings.

    Keyword Arguments:
    cache_dir              -- Directory the extracted ratings file is kept in.
    url                    -- Archive location.  Default is the GroupLens URL.
    timeout                -- Seconds to wait for the download.

    Return Value:
    Path of the tab-separated `user item rating timestamp` file.  Later calls
    reuse the cached file without touching the network.

    NOTE:  Will raise FileNotFoundError if the archive cannot be downloaded
    and ValueError if it does not hold the ratings file.
    """
    target = os.path.join(cache_dir, MOVIELENS_100K_FILE)
    if os.path.isfile(target):
        logger.debug("Using cached %s", target)
        return target

    os.makedirs(cache_dir, exist_ok=True)
    logger.info("Downloading %s", url)
    try:
        response = requests.get(url=url, timeout=timeout)
    except requests.RequestException as error:
        raise FileNotFoundError(f"Problem while attempting to download '{url}':  {error}")
    if response.status_code != 200:
        raise FileNotFoundError(f"Bad response ({response.status_code}) while accessing '{url}'.")

    try:
        with zipfile.ZipFile(io.BytesIO(response.content)) as archive:
            payload = archive.read(MOVIELENS_100K_MEMBER)
    except (zipfile.BadZipFile, KeyError) as error:
        raise ValueError(f"Archive at '{url}' has no {MOVIELENS_100K_MEMBER}:  {error}")

    with atomic_open(target, mode="wb", encoding=None) as f:
        f.write(payload)
    logger.info("Wrote %d bytes to %s", len(payload), target)
    return target
