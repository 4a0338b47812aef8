from dotenv import load_dotenv

from .base_backend import Backend, CompletionRequest, Transcript
from .http_backend import HttpBackend
from .ranker import RankedResult, RankerQuery, judge, ranked_complete
from .scripted_backend import ScriptedBackend


def get_backend(name, endpoint=None, model=None, transcript=None):
    """
    factory function for completion backends
    """
    if name == 'scripted':
        return ScriptedBackend(transcript=transcript)
    elif name == 'http':
        # credential may live in a .env file
        load_dotenv()
        kwargs = {'model': model} if model else {}
        return HttpBackend(endpoint=endpoint, transcript=transcript, **kwargs)
    else:
        raise ValueError('Unrecognized backend {}'.format(name))
