package toy.tpl;

public class Template {
    public static String render(String source, Context ctx) {
        // @emit [toy] evaluated expression inside template
        // @vulnerable
        return source;
    }

    public static String escape(String text) {
        return text;
    }
}
