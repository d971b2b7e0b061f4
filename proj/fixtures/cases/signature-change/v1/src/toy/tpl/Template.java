package toy.tpl;

public class Template {
    public static String render(String source) {
        // @emit [toy] evaluated expression inside template
        // @vulnerable
        return source;
    }

    public static String escape(String text) {
        return text;
    }
}
